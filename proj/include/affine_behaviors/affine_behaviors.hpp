#pragma once

#include "affine_behaviors/behavior.hpp"
#include "affine_behaviors/config.hpp"
#include "affine_behaviors/errors.hpp"
#include "affine_behaviors/io.hpp"
#include "affine_behaviors/linalg.hpp"
#include "affine_behaviors/poly.hpp"
#include "affine_behaviors/poly_matrix.hpp"
#include "affine_behaviors/polymat.hpp"
#include "affine_behaviors/qdf.hpp"
#include "affine_behaviors/realization.hpp"
#include "affine_behaviors/control.hpp"
#include "affine_behaviors/sim.hpp"
#include "affine_behaviors/stability.hpp"
