package com.acme.banking;

import org.junit.jupiter.api.BeforeEach;
import org.junit.jupiter.api.Test;
import static org.junit.jupiter.api.Assertions.*;

public class LedgerTest {

    private Ledger ledger;

    private Account account;

    @BeforeEach
    void setUp() {
        ledger = new Ledger(10);
        account = new Account("bob", 500L);
        account.updateBalance(0L);
    }

    @Test
    void settleChargesFee() {
        long before = account.getBalance();
        ledger.settle(account);
        long fee = before * 10 / 100;
        assertEquals(before - fee, account.getBalance());
        assertTrue(account.getBalance() < before);
    }

    @Test
    void settleOnFrozenAccountFails() {
        account.freeze();
        assertThrows(IllegalStateException.class, () -> ledger.settle(account));
    }
}
