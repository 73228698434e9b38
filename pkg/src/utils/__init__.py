"""Utility-Module (Config, Fehler, Lauf-Registry)"""
