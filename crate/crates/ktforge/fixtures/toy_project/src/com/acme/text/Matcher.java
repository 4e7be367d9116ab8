package com.acme.text;

/**
 * Finds literal patterns inside parsed character streams.
 */
public class Matcher {

    private final Parser parser = new Parser();
    private int hits;

    /**
     * Returns the offset of the pattern inside the parsed input, or -1.
     */
    public int findMatchPattern(char[] input, String pattern) {
        for (int i = 0; i + pattern.length() <= input.length; i++) {
            int j = 0;
            while (j < pattern.length() && input[i + j] == pattern.charAt(j)) {
                j = j + 1;
            }
            if (j == pattern.length()) {
                bumpHits();
                return i;
            }
        }
        return -1;
    }

    /**
     * Matches a raw pattern object after parsing it to characters.
     */
    public int findMatchPattern(Object pattern) {
        int unrelated = 0;
        if (pattern instanceof String) {
            String text = (String) pattern;
            char[] parsed = parser.parsePattern(text);
            return findMatchPattern(parsed, text);
        } else {
            unrelated = unrelated + 1;
        }
        return -1;
    }

    private void bumpHits() {
        countUp();
    }

    private void countUp() {
        hits = hits + 1;
    }

    public int getHits() {
        return hits;
    }
}
