"""Click-trained retrieval and grounded question answering for product
documentation."""

__version__ = "0.1.0"
