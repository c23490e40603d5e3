#!/usr/bin/env python3
"""
Volsr Run Registry Service
==========================

Records CLI runs in the run-registry database. Registry problems are
logged and swallowed: a pipeline command never fails because its run could
not be recorded.

Version: 1.0.0
"""

import logging
from datetime import datetime, timezone as dt_timezone
from typing import Any, Dict, List, Optional

from volsr.database import db_session, init_db
from volsr.models import RunRecord

logger = logging.getLogger(__name__)


class RunRegistryService:
    """Database service for pipeline run history"""

    def __init__(self, database_url: Optional[str] = None):
        """
        Initialize database connection

        Args:
            database_url: SQLAlchemy URL (default: VOLSR_DATABASE_URL or a sqlite file)
        """
        self.database_url = database_url
        try:
            init_db(database_url)
            self.connected = True
        except Exception as e:
            logger.warning(f"⚠️ Run registry unavailable: {e}")
            self.connected = False

    def start_run(self, command: str, output_dir: Optional[str] = None,
                  config: Optional[Dict[str, Any]] = None,
                  inputs: Optional[Dict[str, str]] = None) -> Optional[str]:
        """Record a started run, returning its id (None if the registry is unavailable)"""
        if not self.connected:
            return None
        try:
            with db_session(self.database_url) as session:
                record = RunRecord(command=command, status='running', output_dir=output_dir,
                                   config_json=config or {}, inputs_json=inputs or {})
                session.add(record)
                session.flush()
                return record.id
        except Exception as e:
            logger.warning(f"⚠️ Could not record run start: {e}")
            return None

    def finish_run(self, run_id: Optional[str], exit_code: int, error_code: Optional[str] = None,
                   inputs: Optional[Dict[str, str]] = None) -> bool:
        if not self.connected or run_id is None:
            return False
        try:
            with db_session(self.database_url) as session:
                record = session.get(RunRecord, run_id)
                if record is None:
                    return False
                record.exit_code = exit_code
                record.status = 'ok' if exit_code == 0 else 'failed'
                record.error_code = error_code
                record.finished_at = datetime.now(dt_timezone.utc)
                if inputs:
                    record.inputs_json = inputs
                return True
        except Exception as e:
            logger.warning(f"⚠️ Could not record run finish: {e}")
            return False

    def recent_runs(self, limit: int = 10, command: Optional[str] = None) -> List[Dict[str, Any]]:
        """Most recent runs first, optionally filtered by command"""
        if not self.connected:
            return []
        try:
            with db_session(self.database_url) as session:
                query = session.query(RunRecord)
                if command:
                    query = query.filter(RunRecord.command == command)
                runs = query.order_by(RunRecord.started_at.desc()).limit(limit).all()
                return [run.to_dict() for run in runs]
        except Exception as e:
            logger.error(f"Error listing runs: {e}")
            return []

    def run_count(self, command: Optional[str] = None) -> int:
        if not self.connected:
            return 0
        try:
            with db_session(self.database_url) as session:
                query = session.query(RunRecord)
                if command:
                    query = query.filter(RunRecord.command == command)
                return query.count()
        except Exception as e:
            logger.error(f"Error counting runs: {e}")
            return 0


__all__ = ['RunRegistryService']
