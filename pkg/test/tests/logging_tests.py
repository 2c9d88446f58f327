"""Test gcntune logging setup."""

import copy
import io
import json
import logging
import uuid

from gcntune import log_setup
from gcntune.unittest import GcnTuneTestCase


class LoggingTests(GcnTuneTestCase):
    """Test gcntune logging mechanisms."""

    def setUp(self):
        self.log_cfg = copy.deepcopy(self.cfg)
        self.log_cfg.working_dir = self.tmp_path/'logs'
        self.log_cfg.result_log = self.tmp_path/'logs'/'results.log'
        self.log_cfg.exception_log = self.tmp_path/'logs'/'exceptions.log'

    def tearDown(self):
        log_setup.reset_loggers()

    def test_setup_logger(self):

        err_out = io.StringIO()

        self.assertTrue(log_setup.setup_loggers(self.log_cfg,
                                                err_out=err_out))

        # Check the result logger
        result_logger = logging.getLogger(log_setup.RESULT_LOGGER)
        result_msg = json.dumps({
            "name": str(uuid.uuid4()),
        })
        result_logger.info(result_msg)
        result_log_data = self.log_cfg.result_log.open().read()
        self.assertIn(result_msg + '\n', result_log_data)

        # Check that yapsy errors go to stderr (or the stream we replaced
        # stderr with).
        yapsy_logger = logging.getLogger('yapsy')
        yapsy_msg = str(uuid.uuid4())
        yapsy_logger.error("Testing logging through yapsy. %s", yapsy_msg)
        self.assertIn(yapsy_msg, err_out.getvalue())

        # Check that exceptions get logged too.
        exc_logger = logging.getLogger(log_setup.EXCEPTION_LOGGER)
        exc_msg = str(uuid.uuid4())
        exc_logger.error(exc_msg)
        exc_log_data = self.log_cfg.exception_log.open().read()
        self.assertIn(exc_msg, exc_log_data)

        # This should log through the 'root' logger.
        my_logger = logging.getLogger('gcntune.trainer')
        root_msg = str(uuid.uuid4())
        my_logger.warning(root_msg)
        for handler in logging.getLogger().handlers:
            handler.flush()
        root_log_data = (self.log_cfg.working_dir/'gcntune.log').open().read()
        # All data goes to the root log as well.
        self.assertIn(result_msg, root_log_data)
        self.assertIn(yapsy_msg, root_log_data)
        self.assertIn(exc_msg, root_log_data)
        self.assertIn(root_msg, root_log_data)
        self.assertIn('gcntune.trainer: ' + root_msg, root_log_data)

    def test_unwritable_result_log(self):
        """A result log we can't create is a setup failure."""

        err_out = io.StringIO()
        blocker = self.tmp_path/'blocker'
        blocker.write_text('a file, not a directory')
        self.log_cfg.result_log = blocker/'results.log'

        self.assertFalse(log_setup.setup_loggers(self.log_cfg,
                                                 err_out=err_out))
        self.assertIn('result log', err_out.getvalue())
