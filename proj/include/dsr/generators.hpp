#pragma once

// Benchmark case generators: the 33-bus feeder (canonical radial topology,
// loads, and tie lines; DGs at buses 18/21/31) and a 123-bus feeder with
// five DGs behind normally-open ties (195/251/350/451/610). Both carry a
// ring-of-forwarders communication network with spur links to the center,
// sized from the intact min-delay routing plus a small headroom.
//
// Scenarios start from blackout (all switches open, all loads shed); damage
// profiles draw equipment failures from the seed. The severe profile
// searches seeds upward until the restoration ordering
// pickup(OLR) < pickup(SCLR) < pickup(ICLR) holds with a multi-stage ICLR,
// and reports the seed it settled on.

#include "dsr/formulation.hpp"
#include "dsr/netmodel.hpp"

#include <string>

namespace dsr {

enum class DamageProfile { none, light, severe };

DamageProfile damage_profile_from_string(const std::string& s); // throws on bad input
const char* to_string(DamageProfile p);

struct GeneratedCase {
    CoupledNetwork net;
    Scenario scenario;
    FormulationConfig cfg;
    unsigned long long seed_used = 0; // severe search may advance past the start seed
    int search_attempts = 0;          // draws evaluated by the severe search
};

GeneratedCase gen_feeder33(unsigned long long seed, DamageProfile profile);
GeneratedCase gen_feeder123(unsigned long long seed, DamageProfile profile);

} // namespace dsr
