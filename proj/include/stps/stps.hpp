#pragma once

#include "stps/errors.hpp"
#include "stps/rng.hpp"
#include "stps/channel.hpp"
#include "stps/pls.hpp"
#include "stps/secrecy.hpp"
#include "stps/utility.hpp"
#include "stps/decision.hpp"
#include "stps/learner.hpp"
#include "stps/scenario.hpp"
#include "stps/environment.hpp"
#include "stps/experiment.hpp"
#include "stps/io.hpp"
