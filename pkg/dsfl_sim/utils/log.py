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

import logging
from logging import getLogger

from ResourceBundle import NotInResourceBundleError

from dsfl_sim.utils.messages import Messages


class Logger:
    """
    Thin wrapper over :py:class:`logging.Logger` that resolves message keys from the
    simulator's message bundle. Formatting only happens when the level is enabled.
    """

    def __init__(self, name: str):
        self.logger = getLogger(name)

    def _resolve(self, msg, *args) -> str:
        if args is not None and len(args) > 0:
            return Messages.get_formatted(msg, *args)
        try:
            return Messages.get(msg)
        except NotInResourceBundleError:
            return msg

    def debug(self, msg, *args, **kwargs):
        if self.logger.isEnabledFor(logging.DEBUG):
            self.logger.debug(self._resolve(msg, *args), **kwargs)

    def info(self, msg, *args, **kwargs):
        if self.logger.isEnabledFor(logging.INFO):
            self.logger.info(self._resolve(msg, *args), **kwargs)

    def warning(self, msg, *args, **kwargs):
        if self.logger.isEnabledFor(logging.WARNING):
            self.logger.warning(self._resolve(msg, *args), **kwargs)

    def error(self, msg, *args, **kwargs):
        if self.logger.isEnabledFor(logging.ERROR):
            self.logger.error(self._resolve(msg, *args), **kwargs)
