#pragma once

#include "deepgreen/econ/analysis.hpp"
#include "deepgreen/econ/design.hpp"
#include "deepgreen/econ/glm.hpp"
#include "deepgreen/econ/iv.hpp"
#include "deepgreen/econ/optimize.hpp"
#include "deepgreen/econ/panel.hpp"
#include "deepgreen/econ/placebo.hpp"
#include "deepgreen/econ/psm.hpp"
#include "deepgreen/econ/result.hpp"
#include "deepgreen/econ/table.hpp"
