# database.py
from contextlib import contextmanager
from pathlib import Path

from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker

from core.settings import settings

# ✅ Base vive acá (evita circular import)
Base = declarative_base()


def _clean_db_url(url: str) -> str:
    # quita espacios y comillas por si el .env lo guarda con ""
    return (url or "").strip().strip('"').strip("'")


def database_url(out_dir: str | Path) -> str:
    """RUNS_DB_URL si está seteado; si no, sqlite dentro del directorio de salida."""
    url = _clean_db_url(settings.RUNS_DB_URL)
    if url:
        return url
    return f"sqlite:///{Path(out_dir).resolve() / 'runs.sqlite'}"


_engines: dict = {}


def get_engine(out_dir: str | Path):
    url = database_url(out_dir)
    engine = _engines.get(url)
    if engine is None:
        engine = create_engine(url, pool_pre_ping=True)
        _engines[url] = engine
    return engine


def init_db(out_dir: str | Path):
    # Import diferido para que NO haya circular import
    import models  # noqa: F401

    Path(out_dir).mkdir(parents=True, exist_ok=True)
    engine = get_engine(out_dir)
    Base.metadata.create_all(bind=engine)
    return engine


_session_factories: dict = {}


def session_factory(out_dir: str | Path):
    """SessionLocal por URL; create_all corre una sola vez por base."""
    url = database_url(out_dir)
    SessionLocal = _session_factories.get(url)
    if SessionLocal is None:
        SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=init_db(out_dir))
        _session_factories[url] = SessionLocal
    return SessionLocal


def get_db(out_dir: str | Path):
    db = session_factory(out_dir)()
    try:
        yield db
    finally:
        db.close()


# misma sesión que get_db, para usar con `with` fuera de un framework
session_scope = contextmanager(get_db)
