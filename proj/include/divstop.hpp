#pragma once

#include "divstop/bessel.hpp"
#include "divstop/diffusion.hpp"
#include "divstop/equilibrium.hpp"
#include "divstop/errors.hpp"
#include "divstop/mc_oracle.hpp"
#include "divstop/numerics.hpp"
#include "divstop/policy.hpp"
#include "divstop/preference.hpp"
#include "divstop/report_io.hpp"
#include "divstop/valuation.hpp"
