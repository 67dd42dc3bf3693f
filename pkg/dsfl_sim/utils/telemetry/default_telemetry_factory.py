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

from typing import TYPE_CHECKING, Optional

from dsfl_sim.errors import InvalidConfigError
from dsfl_sim.utils.messages import Messages
from dsfl_sim.utils.properties import Properties, SimProperties
from dsfl_sim.utils.telemetry.null_telemetry import NullTelemetryFactory
from dsfl_sim.utils.telemetry.telemetry import TelemetryFactory

if TYPE_CHECKING:
    from dsfl_sim.utils.telemetry.telemetry import (TelemetryContext,
                                                    TelemetryCounter,
                                                    TelemetryTraceLevel)


def _backend(name: str, value: str, signal: str) -> TelemetryFactory:
    backend = value.upper()
    if backend == "OTLP":
        # imported lazily; the SDK is only needed once a real backend is requested
        from dsfl_sim.utils.telemetry import open_telemetry
        if signal == "traces":
            open_telemetry.install_otlp_traces()
        else:
            open_telemetry.install_otlp_metrics()
        return open_telemetry.OpenTelemetryFactory()
    if backend == "NONE":
        return NullTelemetryFactory()
    raise InvalidConfigError(Messages.get_formatted("DefaultTelemetryFactory.InvalidBackend", name, value), key=name)


class DefaultTelemetryFactory(TelemetryFactory):
    def __init__(self, properties: Optional[Properties] = None):
        properties = properties if properties is not None else Properties()
        self._enable_telemetry = SimProperties.ENABLE_TELEMETRY.get_bool(properties)

        self._traces_telemetry_factory: TelemetryFactory = NullTelemetryFactory()
        self._metrics_telemetry_factory: TelemetryFactory = NullTelemetryFactory()

        if self._enable_telemetry:
            self._traces_telemetry_factory = _backend(
                SimProperties.TELEMETRY_TRACES_BACKEND.name, SimProperties.TELEMETRY_TRACES_BACKEND.get(properties),
                "traces")
            self._metrics_telemetry_factory = _backend(
                SimProperties.TELEMETRY_METRICS_BACKEND.name, SimProperties.TELEMETRY_METRICS_BACKEND.get(properties),
                "metrics")

    def open_telemetry_context(self, name: str, trace_level: TelemetryTraceLevel) -> TelemetryContext:
        return self._traces_telemetry_factory.open_telemetry_context(name, trace_level)

    def create_counter(self, name: str) -> TelemetryCounter:
        return self._metrics_telemetry_factory.create_counter(name)
