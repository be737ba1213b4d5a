"""harood: an out-of-distribution generalization benchmark for sensor-based
human activity recognition.

Windowed multichannel time series are grouped into domains (by person,
sensor position, dataset, or time segment); sixteen training algorithms on
CNN and Transformer backbones are evaluated under leave-one-domain-out
protocols with validation- and oracle-based model selection.
"""

__version__ = "0.1.0"
