#pragma once

#include "gearstab/errors.hpp"
#include "gearstab/integrate.hpp"
#include "gearstab/linalg.hpp"
#include "gearstab/methods.hpp"
#include "gearstab/rational.hpp"
#include "gearstab/stability.hpp"
#include "gearstab/svg.hpp"
