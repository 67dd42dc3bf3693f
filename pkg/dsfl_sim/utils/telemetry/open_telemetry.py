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

from threading import Lock
from typing import TYPE_CHECKING, Dict, Optional

if TYPE_CHECKING:
    from opentelemetry.util.types import AttributeValue

from opentelemetry import context as context_api
from opentelemetry import metrics, trace
from opentelemetry.exporter.otlp.proto.grpc.metric_exporter import \
    OTLPMetricExporter
from opentelemetry.exporter.otlp.proto.grpc.trace_exporter import \
    OTLPSpanExporter
from opentelemetry.metrics import Meter, get_meter
from opentelemetry.sdk.metrics import MeterProvider
from opentelemetry.sdk.metrics.export import PeriodicExportingMetricReader
from opentelemetry.sdk.resources import SERVICE_NAME, Resource
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import BatchSpanProcessor
from opentelemetry.trace import Span, StatusCode, Tracer

from dsfl_sim.utils.log import Logger
from dsfl_sim.utils.telemetry.telemetry import (TelemetryConst,
                                                TelemetryContext,
                                                TelemetryCounter,
                                                TelemetryFactory,
                                                TelemetryTraceLevel)

logger = Logger(__name__)

INSTRUMENTATION_NAME = "dsfl-sim"
METRICS_EXPORT_INTERVAL_MS = 10000

_install_lock = Lock()
_installed: Dict[str, bool] = {"traces": False, "metrics": False}


def _resource() -> Resource:
    return Resource.create(attributes={SERVICE_NAME: INSTRUMENTATION_NAME})


def install_otlp_traces():
    """
    Installs an SDK tracer provider that batches spans to an OTLP exporter. The exporter reads its endpoint and
    headers from the standard ``OTEL_EXPORTER_OTLP_*`` environment variables. Only the first call has an effect.
    """
    with _install_lock:
        if _installed["traces"]:
            return
        provider = TracerProvider(resource=_resource())
        provider.add_span_processor(BatchSpanProcessor(OTLPSpanExporter()))
        trace.set_tracer_provider(provider)
        _installed["traces"] = True
    logger.debug("OpenTelemetryFactory.ProviderInstalled", "traces")


def install_otlp_metrics():
    """Installs an SDK meter provider whose reader pushes to an OTLP exporter. Only the first call has an effect."""
    with _install_lock:
        if _installed["metrics"]:
            return
        reader = PeriodicExportingMetricReader(OTLPMetricExporter(), export_interval_millis=METRICS_EXPORT_INTERVAL_MS)
        metrics.set_meter_provider(MeterProvider(resource=_resource(), metric_readers=[reader]))
        _installed["metrics"] = True
    logger.debug("OpenTelemetryFactory.ProviderInstalled", "metrics")


class OpenTelemetryContext(TelemetryContext):
    def __init__(self, tracer: Tracer, name: str, trace_level: TelemetryTraceLevel):
        self._name = name
        self._span: Optional[Span] = None
        self._token: Optional[object] = None

        if trace_level == TelemetryTraceLevel.NO_TRACE:
            return

        if trace_level == TelemetryTraceLevel.TOP_LEVEL:
            # detached from whatever span is current so every run becomes its own trace
            self._span = tracer.start_span(name, context=context_api.Context())
        else:
            self._span = tracer.start_span(name)
        self._token = context_api.attach(trace.set_span_in_context(self._span))
        self.set_attribute(TelemetryConst.TRACE_NAME_ANNOTATION, name)
        logger.debug("OpenTelemetryContext.TraceId", name, self._span.get_span_context().trace_id)

    def set_success(self, success: bool):
        if self._span is not None:
            self._span.set_status(StatusCode.OK if success else StatusCode.ERROR)

    def set_attribute(self, key: str, value: AttributeValue):
        if self._span is not None:
            self._span.set_attribute(key, value)

    def set_exception(self, exception: BaseException):
        if self._span is not None and exception is not None:
            self._span.set_attribute(TelemetryConst.EXCEPTION_TYPE_ANNOTATION, exception.__class__.__name__)
            self._span.set_attribute(TelemetryConst.EXCEPTION_MESSAGE_ANNOTATION, str(exception))
            self._span.record_exception(exception)

    def get_name(self) -> str:
        return self._name

    def close_context(self):
        if self._token is not None:
            context_api.detach(self._token)
            self._token = None
        if self._span is not None:
            self._span.end()


class OpenTelemetryCounter(TelemetryCounter):
    def __init__(self, meter: Meter, name: str):
        self._name = name
        self._counter = meter.create_counter(name, unit="1")

    def add(self, value: int):
        self._counter.add(value)

    def inc(self):
        self._counter.add(1)

    def get_name(self) -> str:
        return self._name


class OpenTelemetryFactory(TelemetryFactory):
    def open_telemetry_context(self, name: str, trace_level: TelemetryTraceLevel) -> TelemetryContext:
        return OpenTelemetryContext(trace.get_tracer(INSTRUMENTATION_NAME), name, trace_level)

    def create_counter(self, name: str) -> TelemetryCounter:
        return OpenTelemetryCounter(get_meter(INSTRUMENTATION_NAME), name)
