"""Toy-scale scale-recurrent catheter segmentation trainer."""
