#!/usr/bin/env python3
"""
Volsr SQLAlchemy Models
=======================

Run registry table: one row per CLI command invocation.

Version: 1.0.0
"""

import uuid
from datetime import datetime, timezone as dt_timezone
from typing import Any, Dict

from sqlalchemy import JSON, Column, DateTime, Index, Integer, String, Text

from .database import Base


def _utcnow() -> datetime:
    return datetime.now(dt_timezone.utc)


class RunRecord(Base):
    """
    One pipeline command run.

    Timestamps live only here, never in the run's output artifacts.
    """
    __tablename__ = 'volsr_runs'

    id = Column(String(36), primary_key=True, default=lambda: str(uuid.uuid4()))
    command = Column(String(32), nullable=False)
    status = Column(String(16), nullable=False, default='running')  # running | ok | failed
    exit_code = Column(Integer, nullable=True)
    error_code = Column(String(32), nullable=True)
    started_at = Column(DateTime(timezone=True), default=_utcnow)
    finished_at = Column(DateTime(timezone=True), nullable=True)
    output_dir = Column(Text, nullable=True)
    config_json = Column(JSON, default=dict)
    inputs_json = Column(JSON, default=dict)

    __table_args__ = (
        Index('idx_volsr_runs_command', 'command'),
        Index('idx_volsr_runs_started', 'started_at'),
    )

    def __repr__(self):
        return f"<RunRecord(command='{self.command}', status='{self.status}', exit_code={self.exit_code})>"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'id': self.id,
            'command': self.command,
            'status': self.status,
            'exit_code': self.exit_code,
            'error_code': self.error_code,
            'started_at': self.started_at.isoformat() if self.started_at else None,
            'finished_at': self.finished_at.isoformat() if self.finished_at else None,
            'output_dir': self.output_dir,
            'inputs': self.inputs_json or {},
        }


__all__ = ['RunRecord']
