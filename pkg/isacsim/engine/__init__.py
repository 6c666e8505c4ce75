from isacsim.engine.beamforming import (
    BeamPlan,
    PowerAllocation,
    PowerSchedule,
    SinrTerms,
    allocate_all_slots,
    allocate_power,
    build_beams,
    is_diagonally_dominant,
    probe_mapping,
    sinr_terms,
)
from isacsim.engine.channel import (
    CommChannels,
    LinkBudget,
    bistatic_gain,
    bistatic_gains,
    draw_comm_channel,
    draw_reflection,
    draw_reflections,
    free_space_amplitude,
    realize_comm_channels,
)
from isacsim.engine.geometry import (
    Direction,
    Position3,
    UpaGeometry,
    ViewConvention,
    crosstalk,
    crosstalk_closed_form,
    downlook_direction,
    steering_vector,
    uplook_elevation,
)
from isacsim.engine.scene import Deployment
from isacsim.engine.signal import (
    GridDictionary,
    ObservationSet,
    SymbolStreams,
    build_dictionary,
    draw_symbols,
    gateway_observe,
    observe,
    synthesize_all_tx,
    synthesize_tx,
)
from isacsim.engine.streams import RngStreams, StreamTag

__all__ = [
    # Geometry
    "Position3",
    "UpaGeometry",
    "Direction",
    "ViewConvention",
    "downlook_direction",
    "uplook_elevation",
    "steering_vector",
    "crosstalk",
    "crosstalk_closed_form",
    # Channel
    "LinkBudget",
    "CommChannels",
    "draw_comm_channel",
    "realize_comm_channels",
    "draw_reflection",
    "draw_reflections",
    "bistatic_gain",
    "bistatic_gains",
    "free_space_amplitude",
    # Beamforming
    "BeamPlan",
    "SinrTerms",
    "PowerAllocation",
    "PowerSchedule",
    "build_beams",
    "probe_mapping",
    "sinr_terms",
    "allocate_power",
    "allocate_all_slots",
    "is_diagonally_dominant",
    # Signal
    "SymbolStreams",
    "GridDictionary",
    "ObservationSet",
    "draw_symbols",
    "synthesize_tx",
    "synthesize_all_tx",
    "build_dictionary",
    "gateway_observe",
    "observe",
    # Scene and streams
    "Deployment",
    "RngStreams",
    "StreamTag",
]
