#pragma once

#include "gnsch/error.hpp"
#include "gnsch/mesh.hpp"
#include "gnsch/physics.hpp"
#include "gnsch/linsolve.hpp"
#include "gnsch/ns_relax.hpp"
#include "gnsch/sav_ch.hpp"
#include "gnsch/config.hpp"
#include "gnsch/driver.hpp"
#include "gnsch/io.hpp"
#include "gnsch/cli.hpp"
