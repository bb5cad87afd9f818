#pragma once

#include "pcsp/errors.hpp"
#include "pcsp/relations.hpp"
#include "pcsp/instances.hpp"
#include "pcsp/random.hpp"
#include "pcsp/partials.hpp"
#include "pcsp/fpt_solvers.hpp"
#include "pcsp/machine.hpp"
#include "pcsp/completion.hpp"
#include "pcsp/io.hpp"
