import org.junit.jupiter.api.AfterEach;
import org.junit.jupiter.api.BeforeEach;
import org.junit.jupiter.api.Test;
import static org.junit.jupiter.api.Assertions.*;

public class {{CLASS_NAME}}Test {

    // field declarations for the object under test and shared fixtures

    @BeforeEach
    void setUp() {
        // initialize the object under test and its dependencies
    }

    @AfterEach
    void tearDown() {
        // release resources acquired in setUp
    }

    // test methods are appended by later stages
}
