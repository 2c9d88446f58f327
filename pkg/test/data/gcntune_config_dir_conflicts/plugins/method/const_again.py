"""A second user 'const' method, at the same priority as the first."""

import yaml_config as yc

from gcntune import methods


class ConstAgain(methods.MethodPlugin):

    def __init__(self):
        super().__init__('const', 'Another fixed accuracy.',
                         priority=self.PRIO_USER)

    def get_conf(self):
        return yc.KeyedElem('const', elements=[])

    def run(self, ctx):
        return methods.MethodResult(0.0, None, 0, [])
