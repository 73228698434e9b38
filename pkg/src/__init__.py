"""
Wellen-BEM - Hauptmodul
Instationäre Schiffswellen mit Randelementen, ALE-Netzbewegung und adaptiven Netzen
"""

__version__ = '1.0.0'
__author__ = 'Wellen-BEM Team'
