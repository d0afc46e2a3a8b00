#pragma once

#include "eacc/errors.hpp"
#include "eacc/kinematics.hpp"
#include "eacc/text.hpp"

#include "eacc/perception/dataset.hpp"
#include "eacc/perception/ensemble.hpp"
#include "eacc/perception/model_io.hpp"
#include "eacc/perception/regressor.hpp"
#include "eacc/perception/sensor.hpp"
#include "eacc/perception/training.hpp"

#include "eacc/propagation.hpp"

#include "eacc/smpc/mpc.hpp"
#include "eacc/smpc/qp.hpp"
#include "eacc/smpc/qp_solver.hpp"
#include "eacc/smpc/special.hpp"

#include "eacc/harness/batch.hpp"
#include "eacc/harness/config.hpp"
#include "eacc/harness/metrics.hpp"
#include "eacc/harness/records.hpp"
#include "eacc/harness/scenario.hpp"
#include "eacc/harness/trajectories.hpp"
