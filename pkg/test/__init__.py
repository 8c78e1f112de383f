# SPDX-FileCopyrightText: 2024-present crawler-threshold contributors
#
# SPDX-License-Identifier: MIT
