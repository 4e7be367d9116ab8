package com.acme.text;

/**
 * Splits raw pattern text into match characters.
 */
public class Parser {

    private int cursor;

    /**
     * Parses the pattern text into its character form.
     */
    public char[] parsePattern(String text) {
        cursor = 0;
        char[] out = new char[text.length()];
        while (cursor < text.length()) {
            out[cursor] = text.charAt(cursor);
            cursor = cursor + 1;
        }
        return out;
    }

    /** Resets the parser cursor. */
    public void reset() {
        cursor = 0;
    }
}
