#pragma once

#include "icqr/conformal.hpp"
#include "icqr/dataset.hpp"
#include "icqr/experiment.hpp"
#include "icqr/importance.hpp"
#include "icqr/kmeans.hpp"
#include "icqr/matrix.hpp"
#include "icqr/quantile_net.hpp"
#include "icqr/random.hpp"
#include "icqr/summary.hpp"
#include "icqr/synthetic.hpp"
