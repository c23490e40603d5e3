#!/usr/bin/env python3
"""
Volsr Database Session Management
=================================

SQLAlchemy session management for the run registry. Engines are created
lazily and cached per URL, so tests and CLI invocations with different
work directories never share a database.

Version: 1.0.0
"""

import logging
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, Optional, Union

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

logger = logging.getLogger(__name__)

DATABASE_ENV = 'VOLSR_DATABASE_URL'
DEFAULT_DB_NAME = 'volsr_runs.sqlite'

Base = declarative_base()

_engines: Dict[str, Engine] = {}
_sessions: Dict[str, sessionmaker] = {}


def default_database_url(workdir: Union[str, Path, None] = None) -> str:
    """
    Resolve the registry URL.

    Priority:
    1. Environment variable VOLSR_DATABASE_URL
    2. sqlite file in the work directory (or the current directory)
    """
    env_url = os.getenv(DATABASE_ENV)
    if env_url:
        return env_url
    root = Path(workdir) if workdir is not None else Path.cwd()
    return f"sqlite:///{(root / DEFAULT_DB_NAME).resolve()}"


def get_engine(url: Optional[str] = None) -> Engine:
    url = url or default_database_url()
    if url not in _engines:
        _engines[url] = create_engine(url, pool_pre_ping=True, echo=False)
        _sessions[url] = sessionmaker(bind=_engines[url], autocommit=False, autoflush=False,
                                      expire_on_commit=False)
        logger.debug("created engine for %s", url)
    return _engines[url]


@contextmanager
def db_session(url: Optional[str] = None) -> Iterator[Session]:
    """
    Context manager for database sessions

    Usage:
        with db_session(url) as session:
            session.add(record)
    """
    url = url or default_database_url()
    get_engine(url)
    session = _sessions[url]()
    try:
        yield session
        session.commit()
    except Exception:
        session.rollback()
        raise
    finally:
        session.close()


def init_db(url: Optional[str] = None) -> Engine:
    """Create registry tables if they do not exist"""
    from . import models  # noqa: F401

    engine = get_engine(url)
    Base.metadata.create_all(bind=engine, checkfirst=True)
    logger.debug("registry tables ready at %s", engine.url)
    return engine


def dispose_engines() -> None:
    """Close every cached engine"""
    for engine in _engines.values():
        engine.dispose()
    _engines.clear()
    _sessions.clear()


__all__ = [
    'Base',
    'DATABASE_ENV',
    'default_database_url',
    'get_engine',
    'db_session',
    'init_db',
    'dispose_engines',
]
