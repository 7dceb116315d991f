"""Robot localization from collaborative direction-of-arrival estimates of RSSI gradients."""

from .cdoa import CdoaMeasurement, CdoaSmoother, RssiGradient, estimate_cdoa, gradient_rect4
from .channel import ChannelModel, RssiSnapshot, distance_from_rssi, sample_window
from .core import (DegenerateWeightsError, InvalidLayoutError, LocalizationError, NodeLayout, NoSignalDirectionError,
                   Position, RankDeficiencyError, Workspace, wrap_angle)
from .coverage import nodes_required, rect_coverage_area, square_coverage_area
from .localizers import GridState, MeasurementWindow, ParticleFilterState, cdoa_likelihood, em_step, pf_step

__version__ = "0.1.0"
