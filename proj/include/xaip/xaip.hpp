#pragma once

#include "xaip/compiler.hpp"
#include "xaip/decimal.hpp"
#include "xaip/error.hpp"
#include "xaip/explainer.hpp"
#include "xaip/model.hpp"
#include "xaip/parser.hpp"
#include "xaip/plan.hpp"
#include "xaip/planner.hpp"
#include "xaip/printer.hpp"
#include "xaip/serialize.hpp"
#include "xaip/session.hpp"
#include "xaip/validator.hpp"
