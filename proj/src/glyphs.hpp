// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
// 6x11 bitmap glyphs for printable ASCII, bit x of row y set = ink.
#pragma once

#include <cstdint>

namespace mmimpute::detail {

inline constexpr int kGlyphWidth = 6;
inline constexpr int kGlyphHeight = 11;

inline constexpr std::uint8_t kGlyphs[95][11] = {
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // ' '
    {0x00, 0x00, 0x00, 0x06, 0x06, 0x06, 0x06, 0x00, 0x06, 0x00, 0x00},  // '!'
    {0x00, 0x00, 0x00, 0x0a, 0x0a, 0x0a, 0x00, 0x00, 0x00, 0x00, 0x00},  // '"'
    {0x00, 0x00, 0x0a, 0x0a, 0x1f, 0x0a, 0x0a, 0x1f, 0x0a, 0x0a, 0x00},  // '#'
    {0x00, 0x04, 0x1e, 0x13, 0x0f, 0x1e, 0x18, 0x1b, 0x0f, 0x04, 0x00},  // '$'
    {0x00, 0x00, 0x07, 0x15, 0x0f, 0x04, 0x1e, 0x15, 0x1c, 0x00, 0x00},  // '%'
    {0x00, 0x00, 0x00, 0x0e, 0x03, 0x06, 0x1f, 0x0d, 0x1f, 0x00, 0x00},  // '&'
    {0x00, 0x00, 0x0c, 0x04, 0x02, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // "'"
    {0x00, 0x00, 0x08, 0x04, 0x06, 0x06, 0x06, 0x06, 0x04, 0x08, 0x00},  // '('
    {0x00, 0x00, 0x02, 0x04, 0x0c, 0x0c, 0x0c, 0x0c, 0x04, 0x02, 0x00},  // ')'
    {0x00, 0x00, 0x04, 0x0f, 0x06, 0x09, 0x00, 0x00, 0x00, 0x00, 0x00},  // '*'
    {0x00, 0x00, 0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00, 0x00, 0x00},  // '+'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x04, 0x02},  // ','
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00, 0x00, 0x00},  // '-'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x06, 0x00, 0x00},  // '.'
    {0x00, 0x00, 0x10, 0x10, 0x08, 0x08, 0x04, 0x04, 0x02, 0x02, 0x00},  // '/'
    {0x00, 0x00, 0x0e, 0x1b, 0x1b, 0x1b, 0x1b, 0x1b, 0x0e, 0x00, 0x00},  // '0'
    {0x00, 0x00, 0x0c, 0x0f, 0x0c, 0x0c, 0x0c, 0x0c, 0x3f, 0x00, 0x00},  // '1'
    {0x00, 0x00, 0x0e, 0x1b, 0x18, 0x0c, 0x06, 0x1b, 0x1f, 0x00, 0x00},  // '2'
    {0x00, 0x00, 0x0e, 0x1b, 0x18, 0x0e, 0x18, 0x1b, 0x0e, 0x00, 0x00},  // '3'
    {0x00, 0x00, 0x18, 0x1c, 0x1a, 0x1b, 0x3f, 0x18, 0x18, 0x00, 0x00},  // '4'
    {0x00, 0x00, 0x1f, 0x03, 0x0f, 0x1b, 0x18, 0x19, 0x0f, 0x00, 0x00},  // '5'
    {0x00, 0x00, 0x0e, 0x1b, 0x03, 0x0f, 0x1b, 0x1b, 0x0e, 0x00, 0x00},  // '6'
    {0x00, 0x00, 0x1f, 0x1b, 0x18, 0x0c, 0x0c, 0x06, 0x06, 0x00, 0x00},  // '7'
    {0x00, 0x00, 0x0e, 0x1b, 0x1b, 0x0e, 0x1b, 0x1b, 0x0e, 0x00, 0x00},  // '8'
    {0x00, 0x00, 0x0e, 0x1b, 0x1b, 0x1e, 0x18, 0x1b, 0x0e, 0x00, 0x00},  // '9'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x06, 0x00, 0x00, 0x06, 0x00, 0x00},  // ':'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x06, 0x00, 0x00, 0x06, 0x02, 0x01},  // ';'
    {0x00, 0x00, 0x00, 0x0c, 0x06, 0x03, 0x06, 0x0c, 0x00, 0x00, 0x00},  // '<'
    {0x00, 0x00, 0x00, 0x00, 0x0f, 0x00, 0x0f, 0x00, 0x00, 0x00, 0x00},  // '='
    {0x00, 0x00, 0x00, 0x06, 0x0c, 0x18, 0x0c, 0x06, 0x00, 0x00, 0x00},  // '>'
    {0x00, 0x00, 0x00, 0x0e, 0x19, 0x0c, 0x06, 0x00, 0x06, 0x00, 0x00},  // '?'
    {0x00, 0x00, 0x0e, 0x13, 0x19, 0x15, 0x15, 0x39, 0x03, 0x0e, 0x00},  // '@'
    {0x00, 0x00, 0x00, 0x0f, 0x0e, 0x0a, 0x1f, 0x1b, 0x3b, 0x00, 0x00},  // 'A'
    {0x00, 0x00, 0x00, 0x0f, 0x1b, 0x0f, 0x1b, 0x1b, 0x0f, 0x00, 0x00},  // 'B'
    {0x00, 0x00, 0x00, 0x1e, 0x1b, 0x03, 0x03, 0x1b, 0x0e, 0x00, 0x00},  // 'C'
    {0x00, 0x00, 0x00, 0x0f, 0x1b, 0x1b, 0x1b, 0x1b, 0x0f, 0x00, 0x00},  // 'D'
    {0x00, 0x00, 0x00, 0x1f, 0x03, 0x0f, 0x03, 0x1b, 0x1f, 0x00, 0x00},  // 'E'
    {0x00, 0x00, 0x00, 0x1f, 0x03, 0x0f, 0x03, 0x03, 0x07, 0x00, 0x00},  // 'F'
    {0x00, 0x00, 0x00, 0x0e, 0x1b, 0x03, 0x1f, 0x1b, 0x1e, 0x00, 0x00},  // 'G'
    {0x00, 0x00, 0x00, 0x3b, 0x1b, 0x1f, 0x1b, 0x1b, 0x3b, 0x00, 0x00},  // 'H'
    {0x00, 0x00, 0x00, 0x0f, 0x06, 0x06, 0x06, 0x06, 0x0f, 0x00, 0x00},  // 'I'
    {0x00, 0x00, 0x00, 0x1e, 0x0c, 0x0c, 0x0d, 0x0d, 0x07, 0x00, 0x00},  // 'J'
    {0x00, 0x00, 0x00, 0x1b, 0x0b, 0x07, 0x0f, 0x1b, 0x37, 0x00, 0x00},  // 'K'
    {0x00, 0x00, 0x00, 0x07, 0x03, 0x03, 0x03, 0x1b, 0x1f, 0x00, 0x00},  // 'L'
    {0x00, 0x00, 0x00, 0x11, 0x1b, 0x1b, 0x1f, 0x15, 0x15, 0x00, 0x00},  // 'M'
    {0x00, 0x00, 0x00, 0x3b, 0x17, 0x17, 0x1b, 0x1b, 0x13, 0x00, 0x00},  // 'N'
    {0x00, 0x00, 0x00, 0x0e, 0x1b, 0x1b, 0x1b, 0x1b, 0x0e, 0x00, 0x00},  // 'O'
    {0x00, 0x00, 0x00, 0x0f, 0x1b, 0x1b, 0x0f, 0x03, 0x07, 0x00, 0x00},  // 'P'
    {0x00, 0x00, 0x00, 0x0e, 0x1b, 0x1b, 0x1b, 0x1b, 0x0e, 0x18, 0x00},  // 'Q'
    {0x00, 0x00, 0x00, 0x0f, 0x1b, 0x1b, 0x0f, 0x1b, 0x37, 0x00, 0x00},  // 'R'
    {0x00, 0x00, 0x00, 0x1e, 0x13, 0x0f, 0x1c, 0x19, 0x0f, 0x00, 0x00},  // 'S'
    {0x00, 0x00, 0x00, 0x1f, 0x16, 0x06, 0x06, 0x06, 0x0f, 0x00, 0x00},  // 'T'
    {0x00, 0x00, 0x00, 0x3b, 0x1b, 0x1b, 0x1b, 0x1b, 0x0e, 0x00, 0x00},  // 'U'
    {0x00, 0x00, 0x00, 0x3b, 0x1b, 0x0a, 0x0e, 0x0e, 0x04, 0x00, 0x00},  // 'V'
    {0x00, 0x00, 0x00, 0x35, 0x15, 0x15, 0x1f, 0x0e, 0x0a, 0x00, 0x00},  // 'W'
    {0x00, 0x00, 0x00, 0x33, 0x1e, 0x0c, 0x0c, 0x1e, 0x33, 0x00, 0x00},  // 'X'
    {0x00, 0x00, 0x00, 0x33, 0x33, 0x1e, 0x0c, 0x0c, 0x1e, 0x00, 0x00},  // 'Y'
    {0x00, 0x00, 0x00, 0x1f, 0x1b, 0x0c, 0x06, 0x1b, 0x1f, 0x00, 0x00},  // 'Z'
    {0x00, 0x00, 0x0e, 0x06, 0x06, 0x06, 0x06, 0x06, 0x06, 0x0e, 0x00},  // '['
    {0x00, 0x00, 0x01, 0x01, 0x02, 0x02, 0x04, 0x04, 0x08, 0x08, 0x00},  // '\\'
    {0x00, 0x00, 0x0e, 0x0c, 0x0c, 0x0c, 0x0c, 0x0c, 0x0c, 0x0e, 0x00},  // ']'
    {0x00, 0x00, 0x04, 0x0e, 0x1b, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // '^'
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x3f},  // '_'
    {0x00, 0x00, 0x06, 0x04, 0x08, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // '`'
    {0x00, 0x00, 0x00, 0x00, 0x0e, 0x1b, 0x1e, 0x1b, 0x3f, 0x00, 0x00},  // 'a'
    {0x00, 0x00, 0x03, 0x03, 0x0f, 0x1b, 0x1b, 0x1b, 0x0f, 0x00, 0x00},  // 'b'
    {0x00, 0x00, 0x00, 0x00, 0x0e, 0x1b, 0x03, 0x1b, 0x0e, 0x00, 0x00},  // 'c'
    {0x00, 0x00, 0x1c, 0x18, 0x1e, 0x1b, 0x1b, 0x1b, 0x3e, 0x00, 0x00},  // 'd'
    {0x00, 0x00, 0x00, 0x00, 0x0e, 0x1b, 0x1f, 0x03, 0x1e, 0x00, 0x00},  // 'e'
    {0x00, 0x00, 0x1c, 0x06, 0x1f, 0x06, 0x06, 0x06, 0x1f, 0x00, 0x00},  // 'f'
    {0x00, 0x00, 0x00, 0x00, 0x36, 0x1b, 0x1b, 0x1b, 0x1e, 0x18, 0x0f},  // 'g'
    {0x00, 0x00, 0x03, 0x03, 0x0f, 0x1b, 0x1b, 0x1b, 0x1b, 0x00, 0x00},  // 'h'
    {0x00, 0x00, 0x0c, 0x00, 0x0f, 0x0c, 0x0c, 0x0c, 0x3f, 0x00, 0x00},  // 'i'
    {0x00, 0x00, 0x0c, 0x00, 0x0f, 0x0c, 0x0c, 0x0c, 0x0c, 0x0c, 0x07},  // 'j'
    {0x00, 0x00, 0x03, 0x03, 0x1b, 0x0f, 0x07, 0x0f, 0x3b, 0x00, 0x00},  // 'k'
    {0x00, 0x00, 0x0f, 0x0c, 0x0c, 0x0c, 0x0c, 0x0c, 0x3f, 0x00, 0x00},  // 'l'
    {0x00, 0x00, 0x00, 0x00, 0x0f, 0x1f, 0x15, 0x15, 0x15, 0x00, 0x00},  // 'm'
    {0x00, 0x00, 0x00, 0x00, 0x0d, 0x1b, 0x1b, 0x1b, 0x1b, 0x00, 0x00},  // 'n'
    {0x00, 0x00, 0x00, 0x00, 0x0e, 0x1b, 0x1b, 0x1b, 0x0e, 0x00, 0x00},  // 'o'
    {0x00, 0x00, 0x00, 0x00, 0x0f, 0x1b, 0x1b, 0x1b, 0x0f, 0x03, 0x07},  // 'p'
    {0x00, 0x00, 0x00, 0x00, 0x36, 0x1b, 0x1b, 0x1b, 0x1e, 0x18, 0x3c},  // 'q'
    {0x00, 0x00, 0x00, 0x00, 0x3b, 0x2e, 0x06, 0x06, 0x0f, 0x00, 0x00},  // 'r'
    {0x00, 0x00, 0x00, 0x00, 0x1e, 0x07, 0x1e, 0x38, 0x1f, 0x00, 0x00},  // 's'
    {0x00, 0x00, 0x06, 0x06, 0x1f, 0x06, 0x06, 0x36, 0x1c, 0x00, 0x00},  // 't'
    {0x00, 0x00, 0x00, 0x00, 0x1b, 0x1b, 0x1b, 0x1b, 0x3e, 0x00, 0x00},  // 'u'
    {0x00, 0x00, 0x00, 0x00, 0x1b, 0x1b, 0x0e, 0x0e, 0x04, 0x00, 0x00},  // 'v'
    {0x00, 0x00, 0x00, 0x00, 0x35, 0x15, 0x1f, 0x1e, 0x0a, 0x00, 0x00},  // 'w'
    {0x00, 0x00, 0x00, 0x00, 0x37, 0x1e, 0x0c, 0x1e, 0x3b, 0x00, 0x00},  // 'x'
    {0x00, 0x00, 0x00, 0x00, 0x3b, 0x1b, 0x1b, 0x0a, 0x0e, 0x06, 0x03},  // 'y'
    {0x00, 0x00, 0x00, 0x00, 0x1f, 0x0d, 0x06, 0x1b, 0x1f, 0x00, 0x00},  // 'z'
    {0x00, 0x00, 0x18, 0x0c, 0x0c, 0x06, 0x0c, 0x0c, 0x0c, 0x18, 0x00},  // '{'
    {0x00, 0x00, 0x00, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04, 0x00},  // '|'
    {0x00, 0x00, 0x03, 0x06, 0x06, 0x0c, 0x06, 0x06, 0x06, 0x03, 0x00},  // '}'
    {0x00, 0x00, 0x00, 0x00, 0x16, 0x0d, 0x00, 0x00, 0x00, 0x00, 0x00},  // '~'
};

}  // namespace mmimpute::detail
