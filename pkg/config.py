import os
from dotenv import load_dotenv

load_dotenv()

class Config:
    """Application configuration: pipeline defaults plus ambient settings from the environment."""

    # Pipeline defaults (overridable by CLI flags only)
    DEFAULT_SEED = 42
    DEFAULT_TREES = 500
    DEFAULT_MIN_LEAF = 1
    DEFAULT_FRACTION = 0.7
    DEFAULT_GENRES = (
        'Bossa Nova',
        'Forró',
        'MPB',
        'Pop',
        'Reggae',
        'Rock',
        'Samba',
        'Sertanejo',
    )

    # Ambient (never changes an artifact)
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'info')
    N_JOBS = os.getenv('N_JOBS', '1')

    @classmethod
    def n_jobs(cls) -> int:
        """Worker threads from N_JOBS; call validate() first."""
        return int(cls.N_JOBS)

    @classmethod
    def validate(cls):
        """Validate that the defaults and ambient settings are usable."""
        problems = []

        if cls.DEFAULT_SEED < 1:
            problems.append('DEFAULT_SEED')
        if cls.DEFAULT_TREES < 1:
            problems.append('DEFAULT_TREES')
        if cls.DEFAULT_MIN_LEAF < 1:
            problems.append('DEFAULT_MIN_LEAF')
        if not 0.0 < cls.DEFAULT_FRACTION < 1.0:
            problems.append('DEFAULT_FRACTION')
        if not cls.DEFAULT_GENRES:
            problems.append('DEFAULT_GENRES')
        try:
            if cls.n_jobs() < 1:
                problems.append('N_JOBS')
        except (TypeError, ValueError):
            problems.append(f"N_JOBS (not an integer: {cls.N_JOBS!r})")

        if problems:
            raise ValueError(f"Invalid configuration: {', '.join(problems)}")

        return True
