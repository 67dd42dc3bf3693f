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

from abc import ABC, abstractmethod
from enum import Enum, auto
from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from types import TracebackType

    from opentelemetry.util.types import AttributeValue


class TelemetryConst:
    TRACE_NAME_ANNOTATION = "trace_name"
    EXCEPTION_TYPE_ANNOTATION = "exception_type"
    EXCEPTION_MESSAGE_ANNOTATION = "exception_message"

    BLOCK_UPDATES_COUNTER = "dsfl_sim.block_updates"
    FINAL_COST = "final_cost"
    UNSERVED_DEVICES = "unserved"
    FINAL_ACCURACY = "final_accuracy"

    @staticmethod
    def run_trace(run: str) -> str:
        """Trace name of one solver or training run, e.g. ``dsfl_sim.solve`` or ``dsfl_sim.dsfl``."""
        return f"dsfl_sim.{run}"

    @staticmethod
    def aggregations_counter(protocol: str) -> str:
        return f"dsfl_sim.{protocol}.aggregations"


class TelemetryTraceLevel(Enum):
    TOP_LEVEL = auto()
    NESTED = auto()
    NO_TRACE = auto()


class TelemetryContext(ABC):
    """
    A unit of traced work, e.g. one BSUM solve or one training run. Usable as a context manager:
    leaving the block records success, or the exception that escaped it, and closes the context.
    """

    def set_success(self, success: bool):
        pass

    def set_attribute(self, key: str, value: AttributeValue):
        pass

    def set_exception(self, exception: BaseException):
        pass

    def get_name(self) -> Optional[str]:
        return None

    def close_context(self):
        pass

    def __enter__(self) -> TelemetryContext:
        return self

    def __exit__(
            self,
            exc_type: Optional[type],
            exc_value: Optional[BaseException],
            traceback: Optional[TracebackType]) -> None:
        if exc_value is not None:
            self.set_exception(exc_value)
        self.set_success(exc_value is None)
        self.close_context()


class TelemetryCounter(ABC):
    def add(self, value: int):
        pass

    def inc(self):
        pass


class TelemetryFactory(ABC):
    @abstractmethod
    def open_telemetry_context(self, name: str, trace_level: TelemetryTraceLevel) -> TelemetryContext:
        pass

    @abstractmethod
    def create_counter(self, name: str) -> TelemetryCounter:
        pass
