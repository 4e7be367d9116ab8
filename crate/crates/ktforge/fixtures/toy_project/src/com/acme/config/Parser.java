package com.acme.config;

/**
 * Reads key=value configuration lines.
 */
public class Parser {

    /**
     * Returns the value for the key, or null when the line has no match.
     */
    public String lookup(String line, String key) {
        int idx = line.indexOf('=');
        if (idx < 0) {
            return null;
        }
        String name = line.substring(0, idx);
        if (name.equals(key)) {
            return line.substring(idx + 1);
        }
        return null;
    }
}
