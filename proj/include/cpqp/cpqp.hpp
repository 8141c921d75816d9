#pragma once

#include "cpqp/error.hpp"
#include "cpqp/linalg.hpp"
#include "cpqp/index_set.hpp"
#include "cpqp/model.hpp"
#include "cpqp/perturb.hpp"
#include "cpqp/ipm.hpp"
#include "cpqp/predict.hpp"
#include "cpqp/errbound.hpp"
#include "cpqp/asqp.hpp"
#include "cpqp/gen.hpp"
#include "cpqp/io.hpp"
#include "cpqp/harness.hpp"
