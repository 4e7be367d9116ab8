package com.acme.banking;

import org.junit.jupiter.api.AfterEach;
import org.junit.jupiter.api.BeforeEach;
import org.junit.jupiter.api.Test;
import static org.junit.jupiter.api.Assertions.*;

public class AccountTest {

    private Account account;

    @BeforeEach
    void setUp() {
        account = new Account("alice");
    }

    @AfterEach
    void tearDown() {
        account = null;
    }

    @Test
    void depositTakesBothBranches() {
        assertEquals(500L, account.deposit(500L));
        assertThrows(IllegalArgumentException.class, () -> account.deposit(2000000L));
    }

    @Test
    void depositAccumulatesAndReturnsNewBalance() {
        assertEquals(100L, account.deposit(100L));
        assertEquals(200L, account.deposit(100L));
        long result = account.deposit(42L);
        assertEquals(242L, result);
    }

    @Test
    void depositRejectsNonPositiveAmounts() {
        assertThrows(IllegalArgumentException.class, () -> account.deposit(0L));
        assertThrows(IllegalArgumentException.class, () -> account.deposit(-5L));
    }
}
