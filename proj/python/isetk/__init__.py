# Copyright 2026 The isetk Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Speech intelligibility enhancement toolkit.

F0-driven harmonic-band amplification with an EEMD/Hilbert-envelope pitch
front end and an ESTOI evaluation back end. The heavy lifting lives in the
native `_core` extension; this package re-exports it.
"""

from isetk._core import (
    DegenerateInputError,
    MetricUndefinedError,
    PitchUnavailableError,
    eemd,
    emd,
    enhance,
    estimate_pitch,
    estoi,
    load_wav,
    mix_at_snr,
    one_way_anova,
    plan_frames,
    profiles,
    resample,
    save_wav,
    sti_category,
)

__all__ = [
    "DegenerateInputError",
    "MetricUndefinedError",
    "PitchUnavailableError",
    "eemd",
    "emd",
    "enhance",
    "estimate_pitch",
    "estoi",
    "load_wav",
    "mix_at_snr",
    "one_way_anova",
    "plan_frames",
    "profiles",
    "resample",
    "save_wav",
    "sti_category",
]

__version__ = "0.1.0"
