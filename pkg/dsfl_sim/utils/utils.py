#  Copyright The dsfl_sim Authors. All Rights Reserved.
#
#  Licensed under the Apache License, Version 2.0 (the "License").
#  You may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

from __future__ import annotations

import sys
from logging import DEBUG, Formatter, Logger, StreamHandler
from typing import Optional, Sequence

import numpy as np


class LogUtils:
    @staticmethod
    def setup_logger(logger: Logger, level: int = DEBUG, format_string: Optional[str] = None):
        for handler in logger.handlers:
            if isinstance(handler, StreamHandler):
                handler.setLevel(level)
                logger.setLevel(level)
                return

        if format_string is None:
            format_string = \
                "%(asctime)s.%(msecs)03d %(name)-12s:%(funcName)s [%(levelname)-8s] - %(threadName)s - %(message)s"

        handler = StreamHandler(stream=sys.stdout)
        handler.setFormatter(Formatter(format_string))
        handler.setLevel(level)

        logger.setLevel(level)
        logger.addHandler(handler)


class SeedUtils:
    @staticmethod
    def generator(*entropy: int) -> np.random.Generator:
        """
        Returns a generator keyed by every component of ``entropy``, so that e.g. (seed, round, device)
        always yields the same stream no matter which protocol or thread asks for it.
        """
        return np.random.default_rng(list(entropy))

    @staticmethod
    def parse_seeds(value: str) -> Sequence[int]:
        """Parses "3", "0,4,7" or an inclusive range "0..19"."""
        value = value.strip()
        if ".." in value:
            start, end = value.split("..", 1)
            return list(range(int(start), int(end) + 1))
        return [int(part) for part in value.split(",") if part.strip() != ""]
