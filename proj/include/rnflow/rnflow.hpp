#pragma once

#include "rnflow/types.hpp"
#include "rnflow/convex_function.hpp"
#include "rnflow/moreau.hpp"
#include "rnflow/schedule.hpp"
#include "rnflow/dynamics.hpp"
#include "rnflow/diagnostics.hpp"
#include "rnflow/io.hpp"
#include "rnflow/experiment.hpp"
