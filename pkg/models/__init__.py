"""
生成元基管理模块
==============
按局域维度缓存广义 Gell-Mann 基
"""

from models.basis_manager import BasisManager, basis_manager

__all__ = ['BasisManager', 'basis_manager']
