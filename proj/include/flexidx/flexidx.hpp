#ifndef FLEXIDX_FLEXIDX_HPP
#define FLEXIDX_FLEXIDX_HPP

#include "flexidx/errors.hpp"
#include "flexidx/linalg.hpp"
#include "flexidx/lp.hpp"
#include "flexidx/qp.hpp"
#include "flexidx/model.hpp"
#include "flexidx/activeset.hpp"
#include "flexidx/flexindex.hpp"
#include "flexidx/stats.hpp"
#include "flexidx/montecarlo.hpp"
#include "flexidx/report.hpp"

#endif // FLEXIDX_FLEXIDX_HPP
