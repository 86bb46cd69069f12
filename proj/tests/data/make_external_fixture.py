# Copyright 2026 The salmap Authors
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

"""Regenerates the externally exported activation fixture.

external_2048x7x7_f4.npy  post-ReLU-like float32 volume written by numpy
expected_lafam_7x7_f8.npy channel mean, min-max normalized, computed by numpy
"""

import pathlib

import numpy as np

here = pathlib.Path(__file__).resolve().parent
rng = np.random.default_rng(20240611)

volume = rng.gamma(shape=1.5, scale=1.0, size=(2048, 7, 7))
# A faint blob so the map has a clear peak.
yy, xx = np.mgrid[0:7, 0:7]
volume += 0.8 * np.exp(-((yy - 2) ** 2 + (xx - 4) ** 2) / 3.0)
volume = np.maximum(volume - 0.5, 0.0).astype(np.float32)
np.save(here / "external_2048x7x7_f4.npy", volume)

mean = volume.astype(np.float64).mean(axis=0)
expected = (mean - mean.min()) / (mean.max() - mean.min())
np.save(here / "expected_lafam_7x7_f8.npy", expected)
