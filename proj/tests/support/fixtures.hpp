#pragma once

#include "xaip/parser.hpp"
#include "xaip/plan.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace xaip::test {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::string fixture_path(const std::string& rel) { return std::string(XAIP_FIXTURES) + "/" + rel; }
inline std::string fixture(const std::string& rel) { return read_file(fixture_path(rel)); }

inline Model warehouse() {
    return parse_model(fixture("warehouse/domain.pddl"), fixture("warehouse/problem.pddl"));
}

inline TimedPlan warehouse_plan(const Model& m, const std::string& file) {
    return parse_plan(fixture("warehouse/" + file), m);
}

} // namespace xaip::test
