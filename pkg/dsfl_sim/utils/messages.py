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

import pathlib

import ResourceBundle

MessagePath = pathlib.Path(__file__).parent.parent.joinpath("resources/").resolve()
MessageBundle = ResourceBundle.get_bundle(bundle_name="dsfl_sim_messages", path=MessagePath)


class Messages:
    @staticmethod
    def get(key: str) -> str:
        return MessageBundle.get(key)

    @staticmethod
    def get_formatted(key: str, *args) -> str:
        msg = MessageBundle.get(key)
        return msg.format(*args)
