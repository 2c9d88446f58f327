from gcntune import methods


class BadActivate(methods.MethodPlugin):

    def __init__(self):
        super().__init__('bad_activate', 'Fails to activate.')

    def get_conf(self):
        raise RuntimeError("No config for you.")
