# SPDX-FileCopyrightText: 2024-present crawler-threshold contributors
#
# SPDX-License-Identifier: MIT
__version__ = "0.1.0"
