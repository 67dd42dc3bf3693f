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

import logging

import pytest

from dsfl_sim import set_logger
from dsfl_sim.utils.log import Logger
from dsfl_sim.utils.messages import Messages
from dsfl_sim.utils.utils import SeedUtils


def test_logger_formats_message_keys(caplog):
    logger = Logger("dsfl_sim.test_log")

    with caplog.at_level(logging.DEBUG, logger="dsfl_sim.test_log"):
        logger.debug("BlockUpdater.Rejected", "power")
        logger.warning("not a key")

    assert caplog.records[0].getMessage() == Messages.get_formatted("BlockUpdater.Rejected", "power")
    assert caplog.records[1].getMessage() == "not a key"


def test_disabled_level_skips_formatting(mocker):
    formatted = mocker.patch("dsfl_sim.utils.log.Messages.get_formatted")
    logger = Logger("dsfl_sim.test_log_quiet")
    logging.getLogger("dsfl_sim.test_log_quiet").setLevel(logging.WARNING)

    logger.debug("BlockUpdater.Rejected", "power")

    formatted.assert_not_called()


def test_set_logger_adds_one_handler():
    set_logger("dsfl_sim.test_set_logger", logging.INFO)
    set_logger("dsfl_sim.test_set_logger", logging.ERROR)

    logger = logging.getLogger("dsfl_sim.test_set_logger")
    assert len(logger.handlers) == 1
    assert logger.level == logging.ERROR


@pytest.mark.parametrize("text, seeds", [("3", [3]), ("0,4,7", [0, 4, 7]), ("0..3", [0, 1, 2, 3]), (" 2..2 ", [2])])
def test_parse_seeds(text, seeds):
    assert list(SeedUtils.parse_seeds(text)) == seeds


def test_keyed_generators_are_reproducible():
    assert SeedUtils.generator(1, 2, 3).random() == SeedUtils.generator(1, 2, 3).random()
    assert SeedUtils.generator(1, 2, 3).random() != SeedUtils.generator(1, 3, 2).random()
