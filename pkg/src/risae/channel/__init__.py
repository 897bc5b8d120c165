from .arrays import SPEED_OF_LIGHT, ArrayGeometry, los_component, ula_response, upa_response
from .correlation import linear_array_correlation, ris_correlation, scatterer_correlation
from .fading import (
    LinkSpec,
    MobilityConfig,
    NlosFactors,
    doppler_evolve,
    link_factors,
    nlos_realization,
    path_loss_db,
    rician_link,
)
from .realize import CascadeSet, ChannelModel, ChannelRealization, aggregate, cascade
from .topology import LinkTable, Topology, build_link_table, table_distances, with_scatterers

__all__ = [
    "SPEED_OF_LIGHT", "ArrayGeometry", "los_component", "ula_response", "upa_response",
    "linear_array_correlation", "ris_correlation", "scatterer_correlation",
    "LinkSpec", "MobilityConfig", "NlosFactors", "doppler_evolve", "link_factors",
    "nlos_realization", "path_loss_db", "rician_link",
    "CascadeSet", "ChannelModel", "ChannelRealization", "aggregate", "cascade",
    "LinkTable", "Topology", "build_link_table", "table_distances", "with_scatterers",
]
