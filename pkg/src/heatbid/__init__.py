"""Daily operation planning and day-ahead bidding for district-heating portfolios."""

__version__ = "0.1.0"
