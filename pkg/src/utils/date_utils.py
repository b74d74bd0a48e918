from datetime import UTC, datetime


def utc_now() -> datetime:
    """
    Generate a timezone aware utcnow.
    """
    return datetime.now(UTC)


def run_stamp(moment: datetime | None = None) -> str:
    """Compact UTC stamp used to name run directories, e.g. 20261019T184301Z."""
    moment = moment or utc_now()
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=UTC)
    return moment.astimezone(UTC).strftime("%Y%m%dT%H%M%SZ")
