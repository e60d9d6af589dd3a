from .types import AttenuationReport
from .projection import (
    element_to_node,
    node_to_element,
    aggregate_node_hidden,
    project_roundtrip,
    attenuation_report,
)
