#!/usr/bin/env python3
"""
Unit tests for structured logging and performance monitoring
"""

import json
import logging
import os
import sys
import tempfile
import unittest
import unittest.mock as mock
from pathlib import Path

# Add repository root to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from atensor import logger as logger_module
from atensor.logger import PerformanceMonitor, StructuredFormatter, StructuredLogger, get_logger, set_level


class TestStructuredFormatter(unittest.TestCase):
    """JSON log lines"""

    def test_context_fields_are_merged(self):
        """Context fields land at the top level of the entry"""
        record = logging.LogRecord('atensor.test', logging.INFO, __file__, 10, 'Suite done', None, None)
        record.context = {'suite': 'a-condition', 'residual': 1e-12}
        entry = json.loads(StructuredFormatter().format(record))
        self.assertEqual(entry['message'], 'Suite done')
        self.assertEqual(entry['level'], 'INFO')
        self.assertEqual(entry['suite'], 'a-condition')
        self.assertEqual(entry['residual'], 1e-12)

    def test_exception_block(self):
        """exc_info is rendered with type and message"""
        try:
            raise ValueError('singular metric')
        except ValueError:
            record = logging.LogRecord('atensor.test', logging.ERROR, __file__, 10, 'failed', None, sys.exc_info())
        entry = json.loads(StructuredFormatter().format(record))
        self.assertEqual(entry['exception']['type'], 'ValueError')
        self.assertEqual(entry['exception']['message'], 'singular metric')


class TestStructuredLogger(unittest.TestCase):
    """Handlers, levels and the logger registry"""

    def setUp(self):
        self.temp_dir = Path(tempfile.mkdtemp())
        self.created = []

    def tearDown(self):
        for structured in self.created:
            for handler in list(structured.logger.handlers):
                handler.close()
                structured.logger.removeHandler(handler)

    def make(self, name, **kwargs):
        structured = StructuredLogger(name, **kwargs)
        self.created.append(structured)
        return structured

    def test_file_handlers_write_json(self):
        """With a log directory, context lands in app.log and errors also in error.log"""
        structured = self.make('atensor.test.files', log_dir=self.temp_dir, level='INFO')
        structured.info('Run started', samples=10)
        structured.error('Bad point', exception=ValueError('nan'), point=[0.1, 0.2])
        lines = (self.temp_dir / 'app.log').read_text(encoding='utf-8').splitlines()
        self.assertEqual(len(lines), 2)
        self.assertEqual(json.loads(lines[0])['samples'], 10)
        error_entry = json.loads((self.temp_dir / 'error.log').read_text(encoding='utf-8').splitlines()[0])
        self.assertEqual(error_entry['error_type'], 'ValueError')
        self.assertEqual(error_entry['point'], [0.1, 0.2])

    def test_none_context_is_dropped(self):
        """Keyword arguments set to None are not logged"""
        structured = self.make('atensor.test.none', log_dir=self.temp_dir)
        structured.warning('Sparse context', kept=1, dropped=None)
        entry = json.loads((self.temp_dir / 'app.log').read_text(encoding='utf-8').splitlines()[0])
        self.assertEqual(entry['kept'], 1)
        self.assertNotIn('dropped', entry)

    def test_set_level(self):
        """Console level follows set_level, file handlers stay at DEBUG"""
        structured = self.make('atensor.test.level', log_dir=self.temp_dir)
        structured.set_level('debug')
        self.assertEqual(structured.logger.level, logging.DEBUG)
        levels = sorted(h.level for h in structured.logger.handlers)
        self.assertEqual(levels, [logging.DEBUG, logging.DEBUG, logging.ERROR])

    def test_registry(self):
        """get_logger caches by name and set_level reaches every entry"""
        first = get_logger('atensor.test.registry')
        self.created.append(first)
        self.assertIs(first, get_logger('atensor.test.registry'))
        set_level('ERROR')
        self.assertEqual(first.logger.level, logging.ERROR)
        set_level('INFO')

    def test_log_dir_from_environment(self):
        """ATENSOR_LOG_DIR adds file output to new loggers"""
        log_dir = self.temp_dir / 'env'
        with mock.patch.dict(os.environ, {'ATENSOR_LOG_DIR': str(log_dir), 'LOG_LEVEL': 'DEBUG'}):
            structured = get_logger('atensor.test.env')
        self.created.append(structured)
        self.assertEqual(structured.logger.level, logging.DEBUG)
        self.assertTrue((log_dir / 'app.log').exists())


class TestPerformanceMonitor(unittest.TestCase):
    """Timing context manager"""

    def setUp(self):
        self.logger = mock.MagicMock()

    def test_completed(self):
        """A fast operation logs completion with duration and memory"""
        with PerformanceMonitor(self.logger, 'eigensolve', threshold=60.0, points=5) as monitor:
            pass
        self.assertIsNotNone(monitor.duration)
        self.logger.info.assert_called_once()
        fields = self.logger.info.call_args.kwargs
        self.assertEqual(fields['points'], 5)
        self.assertIn('duration_ms', fields)
        self.assertIn('rss_mb', fields)

    def test_slow(self):
        """Exceeding the threshold logs a warning"""
        with PerformanceMonitor(self.logger, 'sweep', threshold=-1.0):
            pass
        self.logger.warning.assert_called_once()
        self.assertEqual(self.logger.warning.call_args.kwargs['threshold_s'], -1.0)

    def test_failure_is_logged_and_reraised(self):
        """Exceptions are logged and not swallowed"""
        with self.assertRaises(RuntimeError):
            with PerformanceMonitor(self.logger, 'integrate'):
                raise RuntimeError('step budget')
        self.logger.error.assert_called_once()
        self.assertEqual(self.logger.error.call_args.kwargs['exception_type'], 'RuntimeError')

    def test_monitor_performance_uses_engine_logger(self):
        """monitor_performance binds the atensor logger"""
        monitor = logger_module.monitor_performance('suite', threshold=5.0, suite='oracle')
        self.assertIs(monitor.logger, get_logger('atensor'))
        self.assertEqual(monitor.context, {'suite': 'oracle'})


if __name__ == '__main__':
    unittest.main()
