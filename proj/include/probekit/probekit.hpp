#pragma once

// Core engine. The websocket service (probekit/service.hpp) and the command
// line (probekit/cli.hpp) pull in Boost and spdlog and are included separately.

#include "probekit/math.hpp"
#include "probekit/error.hpp"
#include "probekit/rng.hpp"
#include "probekit/graph.hpp"
#include "probekit/graph_io.hpp"
#include "probekit/spatial_index.hpp"
#include "probekit/layout3d.hpp"
#include "probekit/viewpoint.hpp"
#include "probekit/probe.hpp"
#include "probekit/deform.hpp"
#include "probekit/cues.hpp"
#include "probekit/synth.hpp"
#include "probekit/commands.hpp"
#include "probekit/session_state.hpp"
#include "probekit/delta.hpp"
#include "probekit/session.hpp"
#include "probekit/invariants.hpp"
