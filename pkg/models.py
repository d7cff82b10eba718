# models.py
from datetime import datetime

from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import relationship

from database import Base


class Run(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String(40), nullable=False, index=True)
    seed = Column(Integer, nullable=True)

    # echo de RunConfig y métricas principales (JSON)
    config_json = Column(Text, nullable=False)
    metrics_json = Column(Text, nullable=True)

    drt_queries = Column(Integer, default=0)
    wall_time_s = Column(Float, nullable=True)
    manifest_path = Column(String(500), nullable=True)

    created_at = Column(DateTime, default=datetime.utcnow, nullable=False)

    outputs = relationship(
        "RunOutput",
        back_populates="run",
        cascade="all, delete-orphan",
        order_by="RunOutput.id",
    )


class RunOutput(Base):
    __tablename__ = "run_outputs"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("runs.id"), nullable=False, index=True)
    path = Column(String(500), nullable=False)
    sha256 = Column(String(64), nullable=False)

    run = relationship("Run", back_populates="outputs")
