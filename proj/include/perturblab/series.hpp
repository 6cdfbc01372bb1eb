#pragma once

#include "perturblab/series/averaging.hpp"
#include "perturblab/series/bipoly.hpp"
#include "perturblab/series/birkhoff.hpp"
#include "perturblab/series/fourier_taylor.hpp"
#include "perturblab/series/lie.hpp"
