package com.acme.banking;

import java.util.ArrayList;
import java.util.List;

/**
 * Records account movements and settles fees.
 */
public class Ledger {

    /** One recorded movement. */
    public static class Entry {
        final String label;
        final long amount;

        public Entry(String label, long amount) {
            this.label = label;
            this.amount = amount;
        }

        public long signedAmount() {
            if (amount < 0) {
                return -amount;
            }
            return amount;
        }
    }

    private final List<Entry> entries = new ArrayList<Entry>();
    private long feeRate;

    public Ledger(long feeRate) {
        this.feeRate = feeRate;
    }

    /**
     * Applies a bounded credit to the account and returns the new balance.
     */
    public long credit(Account account, long amount) {
        long bounded = clamp(amount);
        return account.deposit(bounded);
    }

    private long clamp(long amount) {
        if (amount > Account.MAX_DEPOSIT) {
            return Account.MAX_DEPOSIT;
        }
        return amount;
    }

    /**
     * Stores a movement for later auditing.
     */
    public void record(String label, long amount) {
        Entry entry = new Entry(label, amount);
        entries.add(entry);
    }

    /**
     * Charges the settlement fee when the account is in the black.
     */
    public void settle(Account account) {
        int audited = 0;
        if (account.getBalance() > 0) {
            long fee = computeFee(account);
            account.withdraw(fee);
        } else {
            audited = audited + 1;
        }
        log("settled", audited);
    }

    private long computeFee(Account account) {
        long base = account.getBalance();
        return base * feeRate / 100L;
    }

    private void log(String message, int count) {
        System.out.println(message + ":" + count);
    }
}
