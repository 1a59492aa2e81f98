#pragma once

#include "aodkit/beam_optics.hpp"

namespace aodkit::aod {

// Lateral x displacement, relative to the centre-frequency ray, after element
// `plane_index` (default: the last element) when the train's AOD is driven at
// `frequency`. The train must hold exactly one AodDeflector followed by a lens.
double steering_map(const AodSpec& spec, const optics::OpticalTrain& train, double frequency,
                    int plane_index = -1);

// d(displacement)/d(frequency), m/Hz, at the same plane.
double steering_efficiency(const AodSpec& spec, const optics::OpticalTrain& train,
                           int plane_index = -1);

}  // namespace aodkit::aod
