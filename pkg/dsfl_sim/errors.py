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

from typing import Optional, Tuple


class DsflSimError(Exception):
    __module__ = "dsfl_sim"


class InvalidConfigError(DsflSimError):
    __module__ = "dsfl_sim"

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class InvalidArgumentError(DsflSimError, ValueError):
    __module__ = "dsfl_sim"


class UnknownEntityError(DsflSimError, LookupError):
    __module__ = "dsfl_sim"


class ShapeMismatchError(DsflSimError, ValueError):
    __module__ = "dsfl_sim"


class InfeasibleAllocationError(DsflSimError):
    __module__ = "dsfl_sim"

    def __init__(self, message: str, uncovered_devices: Tuple[int, ...] = ()):
        super().__init__(message)
        self.uncovered_devices = uncovered_devices


class InstanceTooLargeError(DsflSimError):
    __module__ = "dsfl_sim"


class DatasetFormatError(DsflSimError):
    __module__ = "dsfl_sim"

    def __init__(self, message: str, field: Optional[str] = None, path: Optional[str] = None):
        super().__init__(message)
        self.field = field
        self.path = path
