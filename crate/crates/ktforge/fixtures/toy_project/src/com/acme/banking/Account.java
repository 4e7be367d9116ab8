package com.acme.banking;

/**
 * A bank account holding a balance in cents.
 */
public class Account {

    /** Upper bound for any single deposit, in cents. */
    public static final long MAX_DEPOSIT = 1_000_000L;

    private final String owner;
    private long balance;
    private boolean frozen;

    /**
     * Opens an account with a zero balance.
     */
    public Account(String owner) {
        this.owner = owner;
        this.balance = 0L;
    }

    /**
     * Opens an account with an initial balance in cents.
     */
    public Account(String owner, long initialBalance) {
        this.owner = owner;
        this.balance = initialBalance;
    }

    /**
     * Adds the amount to the balance and returns the new balance.
     */
    public long deposit(long amount) {
        validateAccount();
        if (amount <= 0 || amount > MAX_DEPOSIT) {
            throw new IllegalArgumentException("bad amount");
        }
        balance = balance + amount;
        return balance;
    }

    /**
     * Removes the amount from the balance and returns the new balance.
     */
    public long withdraw(long amount) {
        validateAccount();
        if (amount <= 0 || amount > balance) {
            throw new IllegalStateException("insufficient funds");
        }
        balance = balance - amount;
        return balance;
    }

    /**
     * Applies a signed delta to the balance.
     */
    public void updateBalance(long delta) {
        validateAccount();
        balance = balance + delta;
    }

    private void validateAccount() {
        if (frozen) {
            throw new IllegalStateException("account frozen: " + owner);
        }
    }

    /**
     * Returns null if no user is found
     */
    public String findOwner(String name) {
        if (owner.equals(name)) {
            return owner;
        }
        return null;
    }

    public long getBalance() {
        return balance;
    }

    public void freeze() {
        frozen = true;
    }
}
