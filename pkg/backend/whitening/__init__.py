"""Whitening operators and their Gram-space analysis"""
