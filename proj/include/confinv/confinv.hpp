#pragma once

#include "confinv/error.hpp"
#include "confinv/rational.hpp"
#include "confinv/pi_exact.hpp"
#include "confinv/tensor_algebra.hpp"
#include "confinv/spaceform.hpp"
#include "confinv/jet.hpp"
#include "confinv/expr.hpp"
#include "confinv/curvature.hpp"
#include "confinv/manifold.hpp"
#include "confinv/quadrature.hpp"
#include "confinv/spec_file.hpp"
#include "confinv/verification.hpp"
