#pragma once

#include "nngp/types.hpp"
#include "nngp/taylor.hpp"
#include "nngp/kernels.hpp"
#include "nngp/kernel_jets.hpp"
#include "nngp/quadrature.hpp"
#include "nngp/sampling.hpp"
#include "nngp/optimize.hpp"
#include "nngp/gp.hpp"
#include "nngp/pde.hpp"
#include "nngp/experiments.hpp"
