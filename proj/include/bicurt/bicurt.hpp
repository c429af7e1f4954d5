#pragma once

#include "bicurt/asymptotic.hpp"
#include "bicurt/attained_errors.hpp"
#include "bicurt/bivariate_normal.hpp"
#include "bicurt/design.hpp"
#include "bicurt/errors.hpp"
#include "bicurt/exact.hpp"
#include "bicurt/inference.hpp"
#include "bicurt/params.hpp"
#include "bicurt/simulator.hpp"
#include "bicurt/special_functions.hpp"
#include "bicurt/summation.hpp"
